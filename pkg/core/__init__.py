"""
Core modules for the message-based tag embedding tool.
"""
