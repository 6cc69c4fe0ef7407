def to_words(word):
    return [part for part in word.split(' ') if part]
