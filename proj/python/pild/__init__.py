"""Path-integral Lindblad dynamics with state-to-state transport analysis."""

from ._core import (
    HBAR_CM_FS,
    KB_CM_K,
    ConfigError,
    JumpOperator,
    NumericalError,
    RunConfig,
    SystemModel,
    __version__,
    drain,
    effective_hamiltonian,
    excitonic_nmer,
    figures,
    lindblad_reference,
    load_config,
    parse_config,
    polaritonic_trimer,
    pump,
    reproduce,
    run,
    transition,
)

__all__ = [name for name in dir() if not name.startswith("_")]
