from embed_service.app import main

raise SystemExit(main())
