"""テストモジュール"""