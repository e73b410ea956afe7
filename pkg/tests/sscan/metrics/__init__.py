# This is the __init__.py file for the tests.sscan.metrics package
