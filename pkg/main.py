# main.py - Entry point for the dgwalk experiment harness
from dgwalk.main import main

if __name__ == "__main__":
    import sys
    sys.exit(main())
