"""Just-in-time defect prediction lab.

Mines git repositories into per-commit change features, labels bug-inducing
commits from fix-keyword blame traces, and compares training-window sampling
policies across releases with six classifiers, seven evaluation measures, and
Scott-Knott ranking.
"""

__version__ = "0.1.0"
