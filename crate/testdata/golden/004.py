def quiet(word):
    return word.lower()
