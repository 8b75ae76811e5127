import sys

from airsched.cli import main

sys.exit(main())
