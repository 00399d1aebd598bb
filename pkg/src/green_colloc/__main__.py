import sys

from green_colloc.convlab.cli import main

sys.exit(main())
