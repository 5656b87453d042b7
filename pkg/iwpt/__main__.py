import sys

from iwpt.cli import main

sys.exit(main())
