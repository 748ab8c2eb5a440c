"""riccilab: numerical checks of monotonicity and differential-Harnack
inequalities on explicit model geometries.

The package is organized by what each part verifies:

* :mod:`riccilab.hermitian` -- pointwise linear algebra (block determinant
  and Hessian-determinant bounds).
* :mod:`riccilab.geometry` -- radial model metrics, curvature, distance
  comparison, soliton construction.
* :mod:`riccilab.flows` -- coupled metric / tensor / scalar / bundle flows.
* :mod:`riccilab.lyh` -- differential-Harnack quantities, their minimization
  over vector fields, and soliton residuals.
* :mod:`riccilab.monotone` -- density, spherical-mean and energy-density
  monotonicity, plus the parabolic variant.
* :mod:`riccilab.harnack` -- nondivergence elliptic solves, ratio probes and
  the contact-set determinant chain.
* :mod:`riccilab.cli` / :mod:`riccilab.reports` -- orchestration and report
  emission.
"""

__version__ = "0.1.0"
