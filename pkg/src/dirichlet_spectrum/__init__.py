"""ディリクレ・スペクトル検証ツールキット"""
__version__ = "0.1.0"
