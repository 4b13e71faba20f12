import sys

from ldpnet.frontend.cli.commands import main

sys.exit(main())
