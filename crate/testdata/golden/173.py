def front(arr):
    for item in arr:
        return item
    return None
