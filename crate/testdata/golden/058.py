def position(data, target):
    return data.index(target)
