"""Geometric PID control of a hoop robot rolling on an unknown incline.

The package splits along the control architecture: ``plant`` owns the true
reduced dynamics, ``geometry`` the inertia-induced connection on the circle,
``regularizer`` the inner feedback that puts the error dynamics into
covariant-derivative form, ``controller`` the outer geometric PID loop,
``certificate`` the gain conditions and Lyapunov matrices backing stability,
``reference`` the tracked velocity profiles, ``sim`` the fixed-step closed
loop, and ``cli`` the command-line front end.
"""

__version__ = "0.1.0"
