from pvshift.cli import main

raise SystemExit(main())
