"""
Cluster game agents by who they are picked with, and measure how balance
patches move them.
"""

__version__ = "0.1.0"
