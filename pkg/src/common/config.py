import os

# =========================
# ENUMERATION / SEARCH BUDGETS
# =========================
ENUM_BOUND = int(os.environ.get("ENUM_BOUND", "5000000"))
WORD_BUDGET = int(os.environ.get("WORD_BUDGET", "16"))
SCHREIER_NODE_BUDGET = int(os.environ.get("SCHREIER_NODE_BUDGET", "20000"))
SECTION_RELATION_BUDGET = int(os.environ.get("SECTION_RELATION_BUDGET", "2000000"))
COMPOSITION_BOUND = int(os.environ.get("COMPOSITION_BOUND", "1000000"))
PERM_DOMAIN_BOUND = int(os.environ.get("PERM_DOMAIN_BOUND", "300000"))

# =========================
# RINGS / MODULES
# =========================
MAX_RING_DEGREE = int(os.environ.get("MAX_RING_DEGREE", "6"))
MAX_RING_LEVEL = int(os.environ.get("MAX_RING_LEVEL", "8"))
MODULE_DIM_BOUND = int(os.environ.get("MODULE_DIM_BOUND", "100"))
MODULE_EXHAUST_BOUND = int(os.environ.get("MODULE_EXHAUST_BOUND", "4096"))
WEIL_RESTRICTION_BOUND = int(os.environ.get("WEIL_RESTRICTION_BOUND", "16"))

# =========================
# CURVES
# =========================
PRIME_BUDGET = int(os.environ.get("PRIME_BUDGET", "500"))
POINT_COUNT_BOUND = int(os.environ.get("POINT_COUNT_BOUND", "10000000"))
DISC_BITS = int(os.environ.get("DISC_BITS", "128"))

# =========================
# RUNTIME
# =========================
SEED = int(os.environ.get("SEED", "0"))
THREADS = int(os.environ.get("THREADS", "1"))
USE_CACHE = os.environ.get("USE_CACHE", "0") == "1"
CACHE_DIR = os.environ.get("CACHE_DIR", ".cache/enumerations")
CACHE_VERSION = "1"
LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO")
