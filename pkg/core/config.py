# core/config.py
import os

import torch
from dotenv import load_dotenv

load_dotenv()

# Определяем окружение
IS_TESTING = os.environ.get('TESTING') == '1'

# Все вычисления в двойной точности: допуски конечных разностей (1e-6)
# в float32 недостижимы
torch.set_default_dtype(torch.float64)


# Настройки приложения
class Settings:
    # Logging
    LOG_LEVEL = os.getenv('IDEQ_LOG_LEVEL', 'INFO').upper()
    LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

    # Выходные каталоги запусков (каждый запуск пишет в свой подкаталог)
    OUTPUT_DIR = os.getenv('IDEQ_OUTPUT_DIR', 'runs')

    # Параллелизм: потоки для bench и прямых проходов обучения
    NUM_WORKERS = int(os.getenv('IDEQ_NUM_WORKERS', '1'))
    TORCH_THREADS = int(os.getenv('IDEQ_TORCH_THREADS', '1'))

    DEFAULT_SEED = int(os.getenv('IDEQ_DEFAULT_SEED', '0'))

    # tqdm в длинных циклах; в тестах всегда выключен
    PROGRESS: bool = (
        os.getenv('IDEQ_PROGRESS', 'true').lower() == 'true' and not IS_TESTING
    )


settings = Settings()

torch.set_num_threads(max(1, settings.TORCH_THREADS))
