# This file is intentionally left empty to mark the directory as a Python package.
# It allows pytest to correctly import modules from the parent directory.
