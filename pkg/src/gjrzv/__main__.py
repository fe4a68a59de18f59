import sys

from gjrzv.cli import main

sys.exit(main())
