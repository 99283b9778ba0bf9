import sys

from adtime.cli import main

sys.exit(main())
