"""Numerical diagnostics for composition operators from model spaces into the Hardy space.

Modules
-------
inner
    Inner functions, reproducing kernels and their Laplacian.
level
    Level domains ``{|theta| < delta}`` traced as polylines.
whitney
    Carleson squares and the good/bad Whitney-type decomposition.
symbols
    Symbols, Nevanlinna counting functions and pullback measures.
criteria
    Shell-by-shell integral tests, Luecking sums, Stanton and Berezin tests.
spectral
    Orthonormal bases, Gram matrices and Schatten norms of finite-rank operators.
experiments, cli
    Config-driven experiments and the ``modelschatten`` command.
"""

from .criteria import (ShellReport, berezin_test, compactness_ratio, hs_bounds, hs_stanton,
                       integral_schatten_hardy, integral_schatten_modelspace, luecking_sum,
                       sufficient_sp)
from .inner import InnerFunction, eval_inner, kernel_diag, kernel_laplacian_diag, spectrum
from .level import LevelDomain, level_boundary
from .spectral import (PointMassMeasure, SingularSpectrum, compop_gram, embed_gram, hs_pullback,
                       schatten_norm, tm_basis)
from .symbols import EmpiricalMeasure, Symbol, nevanlinna, nevanlinna_oracle, pullback_measure
from .whitney import WhitneyDecomposition, ahlfors_ratio, build_whitney, validate_whitney

__version__ = "0.1.0"
