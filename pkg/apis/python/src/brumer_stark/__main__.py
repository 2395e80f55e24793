from brumer_stark.cli import main

raise SystemExit(main())
