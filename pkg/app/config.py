# Environment configs
import os
from dotenv import load_dotenv

load_dotenv()

class Settings:
    # Seed for every randomized property check; the CLI --seed flag wins over it
    DEFAULT_SEED: int = int(os.getenv("NCVAL_QRF_SEED", 42))

    LOG_LEVEL: str = os.getenv("NCVAL_QRF_LOG_LEVEL", "INFO")

    # Reports land here when `run` is called without --out
    OUTPUT_DIR: str = os.getenv("NCVAL_QRF_OUTPUT_DIR", "output")

    # Operator storage thresholds.
    # Total dimensions up to DENSE_DIM_LIMIT are embedded as dense numpy arrays,
    # larger spaces use scipy.sparse until the nonzero count passes SPARSE_NNZ_LIMIT,
    # after which factor operators are applied matrix-free.
    DENSE_DIM_LIMIT: int = int(os.getenv("NCVAL_QRF_DENSE_DIM_LIMIT", 512))
    SPARSE_NNZ_LIMIT: int = int(os.getenv("NCVAL_QRF_SPARSE_NNZ_LIMIT", 2_000_000))

    # Relative singular-value threshold used by factor_rank
    FACTOR_TOL: float = float(os.getenv("NCVAL_QRF_FACTOR_TOL", 1e-10))

    # Lattice sites kept clear of the cyclic boundary in grid scenarios
    WRAP_GUARD: int = int(os.getenv("NCVAL_QRF_WRAP_GUARD", 2))

settings = Settings()
