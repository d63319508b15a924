import sys

from charpde.cli.main import main

sys.exit(main())
