from fracwin.cli import main

raise SystemExit(main())
