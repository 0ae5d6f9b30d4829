import os
from pathlib import Path


BASE_DIR = Path(__file__).resolve().parent.parent.parent

LOGS_DIR = Path(os.environ.get("DBAR_AKNS_LOGS_DIR") or BASE_DIR / "logs")
OUT_DIR = Path(os.environ.get("DBAR_AKNS_OUT_DIR") or BASE_DIR / "out")

# MB of complex128 kernel entries a CauchyOperator may keep between applications
KERNEL_CACHE_MB = int(os.environ.get("DBAR_AKNS_KERNEL_CACHE_MB", "256"))

# rows of a kernel chunk: targets are evaluated in batches of this size
TARGET_CHUNK = 512

# complex entries of one (targets x lattice corners) working block of the cell kernel
KERNEL_BLOCK = 2 ** 21


def worker_count() -> int:
    raw = os.environ.get("DBAR_AKNS_THREADS", "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"DBAR_AKNS_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise ValueError(f"DBAR_AKNS_THREADS must be >= 1, got {n}")
    return n
