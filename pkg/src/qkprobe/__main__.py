from qkprobe.harness.cli import main

raise SystemExit(main())
