# run_test.py
import os
import sys

import pytest

if __name__ == '__main__':
    # Добавляем текущую директорию в PYTHONPATH
    sys.path.insert(0, os.path.dirname(__file__))
    os.environ['TESTING'] = '1'

    # Быстрый прогон без медленных приёмочных проверок
    args = sys.argv[1:] or ['-m', 'not acceptance', '-v']
    sys.exit(pytest.main(['tests', *args]))
