"""Binary and text codecs for rasters, maps, masks and tables."""
