# Common package initialization
