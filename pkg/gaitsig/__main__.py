import sys

from gaitsig.cli import main

sys.exit(main())
