"""Random walks indexed by Galton-Watson trees, their limit objects and a verification harness."""

from ._core import (
    REPORT_SCHEMA,
    ConfigError,
    InvalidDistribution,
    JumpDist,
    LimitContext,
    OffspringDist,
    PeriodicJump,
    PeriodicOffspring,
    UnreachableSize,
    conv_power,
    distance_profile,
    hitting_constant,
    hitting_probability,
    inner_kernel,
    kemperman_ratio,
    ks_two_sample,
    llt_deviation,
    local_time_products,
    phi,
    range_sample,
    run_experiment,
    sample_excursion,
    sample_snake,
    sample_tree,
    total_progeny_pmf,
    triple_density_mass_below,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
