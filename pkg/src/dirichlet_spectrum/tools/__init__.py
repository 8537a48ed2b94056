"""MCP ツールのファサード"""
