# funnelgate/config.py

import hashlib
import os

# Default output directory for trajectories, reports and plots
OUT_DIR = os.environ.get(
    "FUNNELGATE_OUT",
    os.path.join(os.getcwd(), "out"),
)

# Seed override; wins over --seed when set
ENV_SEED = os.environ.get("FUNNELGATE_SEED")

LOG_LEVEL = os.environ.get("FUNNELGATE_LOG_LEVEL", "INFO")

# ------------------------------------------------------------
# Numeric tolerances
# ------------------------------------------------------------

NSD_TOL = 1e-10
PD_TOL = 1e-10
JACOBI_REL_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
INVERSE_CLAMP = 1e-15
GAMMA_AUDIT_RTOL = 1e-12

DEFAULT_STEP = 1e-3
DEFAULT_U2_INIT = 0.01
AUDIT_GRID_STEP = 1e-3
# u2 zero crossings and sliding exits are located to this fraction of a step
EVENT_XTOL = 1e-12


def resolve_seed(cli_seed):
    """FUNNELGATE_SEED beats the command line."""
    if ENV_SEED not in (None, ""):
        return int(ENV_SEED)
    return int(cli_seed)


def derive_seed(seed: int, label: str) -> int:
    """Sub-seed for one purpose, fixed hash of (seed, label)."""
    digest = hashlib.sha256(f"{int(seed)}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")
