import sys

from hbms.cli import main

sys.exit(main())
