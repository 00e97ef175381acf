# Integration tests for geospatial pipeline (DTM, orthophoto).
