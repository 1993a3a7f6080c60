"""
Tools package: convergence profiles, filtrations, generators and the urn oracle.
"""

from .convergence import (
    ConvergenceProfile,
    SequenceFamily,
    Verdict,
    aob_search,
    fatou_check,
    order_profile,
    uo_cauchy_profile,
    uo_profile,
)
from .filtration import (
    Filtration,
    PartitionChain,
    Projection,
    ValidationStatus,
    conditional_expectation,
    double_condition_diagnostics,
    recover_partition,
    validate_filtration,
)
from .polya_urn import PolyaUrnOracle

__all__ = [
    'ConvergenceProfile',
    'SequenceFamily',
    'Verdict',
    'aob_search',
    'fatou_check',
    'order_profile',
    'uo_cauchy_profile',
    'uo_profile',
    'Filtration',
    'PartitionChain',
    'Projection',
    'ValidationStatus',
    'conditional_expectation',
    'double_condition_diagnostics',
    'recover_partition',
    'validate_filtration',
    'PolyaUrnOracle',
]
