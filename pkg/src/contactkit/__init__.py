"""Contact symmetries of second-order evolution equations u_t = F(t,x,u,u_x,u_xx).

Subpackages and modules: ``expr`` (expressions, parsing, zero testing),
``jet`` (total derivatives and on-shell restriction), ``contact`` (brackets,
vector fields, transformations), ``algebra`` (structure tables and
realizations), ``verify`` (invariance residuals), ``catalog`` (the classified
equations), ``cli``.
"""

__version__ = "0.1.0"
