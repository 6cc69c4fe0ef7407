def shift(arr):
    return list(map(lambda item: item + 14, arr))
