def contains(options, key):
    return options.get(key) is not None
