# dgwalk/services/__init__.py
