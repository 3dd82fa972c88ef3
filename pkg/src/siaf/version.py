# Code generated by ./release.sh. DO NOT EDIT.

"""Package version"""
__version__ = "0.3.0-dev"
