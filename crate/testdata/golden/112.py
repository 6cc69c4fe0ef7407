def absolute(arr):
    return list(map(abs, arr))
