import sys

from riots.main import main

sys.exit(main())
