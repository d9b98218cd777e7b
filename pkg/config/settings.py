import os
from typing import Optional
from dotenv import load_dotenv

load_dotenv()


class Settings:
    OUTPUT_DIR = os.getenv('NCG_OUTPUT_DIR', 'results')
    EXPERIMENTS_DIR = os.getenv('NCG_EXPERIMENTS_DIR', 'experiments')

    WORKERS = int(os.getenv('NCG_WORKERS', '1'))

    LOG_LEVEL = os.getenv('NCG_LOG_LEVEL', 'INFO')
    LOG_FORMAT = os.getenv('NCG_LOG_FORMAT', '%(asctime)s [%(levelname)8s] %(name)s: %(message)s')

    # Solver configuration
    MAX_BACKTRACKS = int(os.getenv('NCG_MAX_BACKTRACKS', '60'))
    GRADCHECK_STEP = float(os.getenv('NCG_GRADCHECK_STEP', '1e-6'))

    # Desk-scale suite defaults
    DEFAULT_INSTANCES = 100
    DEFAULT_BUDGET = 10000
    DEFAULT_EPSILON = 1e-4

    @property
    def seed_override(self) -> Optional[int]:
        value = os.getenv('NCG_SEED', '').strip()
        if not value:
            return None
        try:
            seed = int(value)
        except ValueError:
            raise ValueError(f"NCG_SEED must be a nonnegative integer, got '{value}'")
        if seed < 0:
            raise ValueError(f"NCG_SEED must be a nonnegative integer, got '{value}'")
        return seed


settings = Settings()
