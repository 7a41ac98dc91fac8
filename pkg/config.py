import os
from dotenv import load_dotenv

# Load environment variables from .env file if it exists
load_dotenv()

# Interrogation: largest N simulated on the full 2^N-dimensional state
BRUTE_CAP = int(os.getenv("QPQLAB_BRUTE_CAP", "14"))

# Monte Carlo defaults
NUM_WORKERS = int(os.getenv("NUM_WORKERS", "1"))
DEFAULT_TRIALS = int(os.getenv("QPQLAB_TRIALS", "100000"))
DEFAULT_SEED = int(os.getenv("QPQLAB_SEED", "0"))
CHUNK_SIZE = int(os.getenv("QPQLAB_CHUNK_SIZE", "2000"))

# Tolerances for exact-vs-exact comparisons (the second one under --strict)
EXACT_TOL = float(os.getenv("QPQLAB_EXACT_TOL", "1e-6"))
STRICT_TOL = float(os.getenv("QPQLAB_STRICT_TOL", "1e-9"))

LOG_LEVEL = os.getenv("QPQLAB_LOG_LEVEL", "INFO")
