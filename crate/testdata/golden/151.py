def has_prefix(path, prefix):
    return path.startswith(prefix)
