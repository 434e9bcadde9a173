import sys

from funnelgate.cli import main

sys.exit(main())
