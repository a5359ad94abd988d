from qsvr.cli import main
import sys
sys.exit(main())
