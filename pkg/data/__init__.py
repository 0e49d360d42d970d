import os
DATA_DIR = os.path.abspath(os.path.dirname(__file__))
