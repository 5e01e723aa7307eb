import sys

from arhq.cli import main

sys.exit(main())
