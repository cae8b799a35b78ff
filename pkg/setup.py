# setup.py
from setuptools import find_packages, setup

setup(
    name='ideq-toolkit',
    version='0.1.0',
    packages=find_packages(exclude=('tests', 'tests.*')),
    install_requires=[
        'torch',
        'numpy',
        'scipy',
        'scikit-image',
        'pydantic',
        'python-dotenv',
        'tqdm',
        'pytest',
    ],
    entry_points={'console_scripts': ['ideq=main:main']},
    py_modules=['main'],
)
