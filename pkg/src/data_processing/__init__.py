# Scene generation, ingestion and scene graph construction
