"""
qpqlab - simulator and exact analytics for O(log N) quantum private query protocols.
"""

__version__ = "0.1.0"

# Pin BLAS threading before numpy is imported; trial fan-out is done by worker processes
import os
import logging

os.environ.setdefault('OMP_NUM_THREADS', '1')
os.environ.setdefault('OPENBLAS_NUM_THREADS', '1')
os.environ.setdefault('MKL_NUM_THREADS', '1')

logging.getLogger('qpqlab').addHandler(logging.NullHandler())
