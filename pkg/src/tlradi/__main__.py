import sys

from tlradi.cli import main

sys.exit(main())
