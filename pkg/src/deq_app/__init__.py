# src/deq_app/__init__.py
