# Core package: models, settings, services and shared helpers
