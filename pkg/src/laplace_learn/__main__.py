import sys

from laplace_learn.cli import main

sys.exit(main())
