"""Numerical quantization on the sphere with curvature degenerating at the poles.

Subpackages by topic:

* :mod:`spherequant.specfun`       -- log-gamma, incomplete gamma, the
  gamma-ratio profile series, log-domain summation
* :mod:`spherequant.model_kernel`  -- flat-space reproducing kernel at an
  even-order curvature zero, series and closed form
* :mod:`spherequant.cp1`           -- sphere geometry, monomial norms,
  density of states, embedding pullbacks
* :mod:`spherequant.toeplitz`      -- compressed multipliers, dense
  Hermitian eigensolver, spectral statistics
* :mod:`spherequant.random_zeros`  -- Gaussian polynomial ensembles,
  simultaneous root finding, distribution tests
* :mod:`spherequant.asymptotics`   -- exponent fits, Richardson refinement
* :mod:`spherequant.cli`           -- reproducible experiment runner
"""

__version__ = "0.1.0"
